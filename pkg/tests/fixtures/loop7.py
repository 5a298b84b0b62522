import sys
data = sys.stdin.read()
total = 0
for i in range(7):
    total += i
print(total)
