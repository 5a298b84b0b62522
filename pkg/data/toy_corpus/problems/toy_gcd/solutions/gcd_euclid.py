import sys


def main():
    data = sys.stdin.read().split()
    t = int(data[0])
    steps = 0
    out = []
    for k in range(t):
        a, b = int(data[1 + 2 * k]), int(data[2 + 2 * k])
        while b:
            steps += 1
            a, b = b, a % b
        steps += 1
        out.append(str(a))
    print("\n".join(out))
    print(f"WEDGE_COST:{steps}", file=sys.stderr)


main()
