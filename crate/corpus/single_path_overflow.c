int main() {
    buf b = malloc(5);
    int n = nondet_int();
    if (n >= 0) {
        b[n] = 1;
    }
    return 0;
}
