// Every access is guarded; nothing to repair.

int main() {
    buf b = malloc(8);
    int n = nondet_int();
    int total = 0;
    if (n >= 0 && n < 8) {
        b[n] = 1;
        total = b[n] + 1;
    }
    if (n > 2) {
        total = total + 10 / n;
    }
    return total;
}
