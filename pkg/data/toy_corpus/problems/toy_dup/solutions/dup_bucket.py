import sys


def main():
    data = sys.stdin.read().split()
    n = int(data[0])
    a = [int(x) for x in data[1:1 + n]]
    steps = 0
    answer = 0
    seen = {}
    for x in a:
        steps += 1
        bucket = seen.setdefault(x, [])
        for _ in bucket:
            answer += 1
            steps += 1
        bucket.append(x)
    print(answer)
    print(f"WEDGE_COST:{steps}", file=sys.stderr)


main()
