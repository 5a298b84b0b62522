import sys


def main():
    data = sys.stdin.read().split()
    n = int(data[0])
    a = sorted(int(x) for x in data[1:1 + n])
    steps = n * max(1, n.bit_length())
    answer = 0
    run = 1
    for i in range(1, n):
        steps += 1
        if a[i] == a[i - 1]:
            run += 1
        else:
            answer += run * (run - 1) // 2
            run = 1
    answer += run * (run - 1) // 2
    print(answer)
    print(f"WEDGE_COST:{steps}", file=sys.stderr)


main()
