values = input().split()
squares = []
for v in values:
    squares.append(int(v) ** 2)
print(squares)
