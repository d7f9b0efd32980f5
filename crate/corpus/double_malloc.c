int main() {
    int n = nondet_int();
    if (n > 0 && n < 8) {
        buf a = malloc(4); buf b = malloc(n);
        a[n] = 1;
        b[n - 1] = 2;
    }
    return 0;
}
