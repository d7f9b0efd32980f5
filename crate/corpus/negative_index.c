// The offset can go below zero for small n.

int main() {
    buf buf = malloc(8);
    int n = nondet_int();
    if (n < 11) {
        buf[n - 3] = 7;
    }
    return 0;
}
