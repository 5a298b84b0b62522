import sys
from itertools import accumulate


def main():
    data = sys.stdin.read().split()
    n, q = int(data[0]), int(data[1])
    prefix = [0, *accumulate(int(x) for x in data[2:2 + n])]
    pairs = data[2 + n:2 + n + 2 * q]
    answers = [
        prefix[int(r)] - prefix[int(l) - 1]
        for l, r in zip(pairs[0::2], pairs[1::2])
    ]
    print("\n".join(map(str, answers)))
    print(f"WEDGE_COST:{n + q}", file=sys.stderr)


main()
