class Shape:
    def area(self):
        return 0


class Rect(Shape):
    def __init__(self, w, h):
        self.w = w
        self.h = h

    def area(self):
        return self.w * self.h


shapes = [Rect(2, 3), Shape()]
big = [s for s in shapes if s.area() > 0 or isinstance(s, Rect)]
print(len(big))
