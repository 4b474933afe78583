var b = 5;
b += 3;
