import sys


def main():
    data = sys.stdin.read().split()
    t = int(data[0])
    out = [str(min(int(data[1 + 2 * k]), int(data[2 + 2 * k]))) for k in range(t)]
    print("\n".join(out))
    print(f"WEDGE_COST:{t}", file=sys.stderr)


main()
