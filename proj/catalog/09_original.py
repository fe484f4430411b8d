n = int(input())
if n % 2 == 0:
    label = "even"
else:
    label = "odd"
print(label)
