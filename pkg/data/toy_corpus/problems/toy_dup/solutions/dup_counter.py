import sys
from collections import Counter


def main():
    data = sys.stdin.read().split()
    n = int(data[0])
    a = [int(x) for x in data[1:1 + n]]
    counts = Counter(a)
    steps = n + len(counts)
    answer = sum(c * (c - 1) // 2 for c in counts.values())
    print(answer)
    print(f"WEDGE_COST:{steps}", file=sys.stderr)


main()
