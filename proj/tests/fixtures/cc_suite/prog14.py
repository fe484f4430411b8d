with open("in.txt") as f:
    lines = f.readlines()
count = 0
for line in lines:
    if line.strip():
        count += 1
print(count)
