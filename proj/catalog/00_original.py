a, b = input().split()
print("sum of " + a + " and " + b + " is " + str(int(a) + int(b)))
