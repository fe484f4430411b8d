numbers = map(int, input().split())
print(sum(numbers))
