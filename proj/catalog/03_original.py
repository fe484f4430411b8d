n = int(input())
i = 0
total = 0
while i < n:
    total += i
    i += 1
print(total)
