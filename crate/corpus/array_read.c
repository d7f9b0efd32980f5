// Out-of-bounds read from a fixed-size array.

int main() {
    int table[4];
    int n = nondet_int();
    int v = 0;
    if (n >= 0) {
        v = table[n];
    }
    return v;
}
