import os
import sys


def check_n_large(n):
    if n >= 90:
        sys.stderr.write("WEDGE_CHECK_HIT:n_large\n")
        sys.stderr.flush()
        if os.environ.get("WEDGE_ABORT") == "1":
            os.abort()


def main():
    data = sys.stdin.read().split()
    n = int(data[0]) if data and data[0].isdigit() else 0
    check_n_large(n)
    steps = 0
    for _ in range(min(n, 200)):
        steps += 1
    print(n)
    sys.stderr.write(f"WEDGE_COST:{steps + 1}\n")


main()
