int main() {
    int x = nondet_int();
    int y = nondet_int();
    int r = x % (y - 3);
    return r;
}
