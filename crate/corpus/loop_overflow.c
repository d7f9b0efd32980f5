// Classic off-by-one: the loop runs one slot past the allocation.

int main() {
    int n = nondet_int();
    if (n > 0 && n < 8) {
        buf b = malloc(n);
        int i = 0;
        while (i <= n) {
            b[i] = 0;
            i++;
        }
    }
    return 0;
}
