import json
import sys

import jsonschema

schema_path, meta_path = sys.argv[1:3]
with open(schema_path) as f:
    schema = json.load(f)
with open(meta_path) as f:
    meta = json.load(f)
jsonschema.validate(meta, schema)
nx, ny, nz = meta["dims"]
with open(meta_path.replace("design.meta.json", "design.eps.csv")) as f:
    rows = f.read().strip().splitlines()
assert rows[0] == "ix,iy,iz,eps", rows[0]
assert len(rows) - 1 == nx * ny * nz
print("design.meta.json conforms")
