// A 10-byte array copied into a 5-byte heap buffer.

int main() {
    int i = 0;
    char content[10];

    buf buffer = malloc(5);

    int j = 0;
    while (j < sizeof(content)) {
        content[j] = 65 + j;
        j++;
    }

    // The copy below is bounded by the size of content
    // instead of the size of buffer.


    for (i; i < sizeof(content); i++) buffer[i] = content[i];

    return 0;
}
