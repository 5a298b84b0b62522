import os
import sys
import time

token = sys.stdin.read().strip()
fresh = not os.path.exists("marker.txt")
with open("marker.txt", "w") as fh:
    fh.write(token)
time.sleep(0.05)
with open("marker.txt") as fh:
    seen = fh.read()
print(seen, "fresh" if fresh else "reused", os.environ.get("WEDGE_ABORT", "-"))
