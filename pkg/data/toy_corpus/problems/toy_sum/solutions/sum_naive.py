import sys


def main():
    data = sys.stdin.read().split()
    n, q = int(data[0]), int(data[1])
    a = [int(x) for x in data[2:2 + n]]
    pos = 2 + n
    steps = 0
    out = []
    for _ in range(q):
        l, r = int(data[pos]), int(data[pos + 1])
        pos += 2
        total = 0
        for i in range(l - 1, r):
            total += a[i]
            steps += 1
        out.append(str(total))
    print("\n".join(out))
    print(f"WEDGE_COST:{steps}", file=sys.stderr)


main()
