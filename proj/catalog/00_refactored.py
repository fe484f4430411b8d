a, b = input().split()
print(f"sum of {a} and {b} is {int(a) + int(b)}")
