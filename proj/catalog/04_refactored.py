values = input().split()
squares = [int(v) ** 2 for v in values]
print(squares)
