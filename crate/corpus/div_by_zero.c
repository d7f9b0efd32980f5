// Divisor is an unchecked input.

int main() {
    int a = nondet_int();
    int d = nondet_int();
    int q = 0;
    if (a > 1) {
        q = a / d;
    }
    return q;
}
