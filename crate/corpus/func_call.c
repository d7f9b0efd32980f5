// The overflow happens inside a helper.

void fill(buf dst, int count) {
    int i = 0;
    while (i < count) {
        dst[i] = 0;
        i++;
    }
}

int main() {
    buf b = malloc(4);
    int n = nondet_int();
    fill(b, n);
    return 0;
}
