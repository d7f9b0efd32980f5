// An overflow and a division by zero in the same function.

int main() {
    buf p = malloc(4);
    int n = nondet_int();
    int d = nondet_int();
    if (n >= 0) {
        p[n] = 1;
    }
    int r = 100 / d;
    return r;
}
