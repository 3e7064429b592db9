import sys

for line in sys.stdin:
    parts = line.split()
    if parts[:2] != ["EVAL", "v1"]:
        print("ERR bad request", flush=True)
        continue
    print("OK %r" % sum(float(v) for v in parts[2:]), flush=True)
