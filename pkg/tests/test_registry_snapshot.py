from bellgate.io import dumps, loads
from bellgate.registry import load_snapshot, snapshot


def test_shipped_snapshot_matches_code():
    # regenerate with: python3 -c "from bellgate.registry import snapshot; from bellgate.io import
    # write_json; write_json('src/bellgate/data/registry.json', snapshot())"
    assert load_snapshot() == loads(dumps(snapshot()))
