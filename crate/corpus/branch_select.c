// Only one arm of the branch overflows.

int main() {
    buf b = malloc(4);
    int x = nondet_int();
    int y = nondet_int();
    int off = 0;
    if (x > y) {
        off = x - y;
    } else {
        off = y - x;
    }
    if (off < 6) {
        b[off] = 1;
    }
    return off;
}
