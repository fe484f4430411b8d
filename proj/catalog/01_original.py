import math

deg = float(input())
rad = deg * math.pi / 180.0
print(math.sin(rad))
