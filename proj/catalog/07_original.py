names = input().split()
for i in range(len(names)):
    print(i, names[i])
