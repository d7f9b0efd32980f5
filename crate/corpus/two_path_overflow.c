// Two paths reach the same store with different offsets.
// When k > 3 the loop writes two slots ahead of i.

int main() {
    buf data = malloc(6);
    int n = nondet_int();
    int k = nondet_int();
    int i = 0;
    while (i < n) {
        int idx = i;
        if (k > 3) {
            idx = i + 2;
        }
        data[idx] = 1;
        i++;
    }
    return 0;
}
