// A loop whose guard already respects the allocation.

int main() {
    int n = nondet_int();
    int m = nondet_int();
    buf a = malloc(6);
    int i = 0;
    while (i < n && i < 6) {
        a[i] = m;
        i++;
    }
    int r = 0;
    if (m != 0) {
        r = n / m;
    }
    return r;
}
