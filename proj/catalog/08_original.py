xs = input().split()
ys = input().split()
for i in range(len(xs)):
    print(xs[i], ys[i])
