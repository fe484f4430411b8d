n = int(input())
label = "even" if n % 2 == 0 else "odd"
print(label)
