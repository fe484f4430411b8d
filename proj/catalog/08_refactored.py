xs = input().split()
ys = input().split()
for x, y in zip(xs, ys):
    print(x, y)
