import math

deg = float(input())
print(math.sin(math.radians(deg)))
