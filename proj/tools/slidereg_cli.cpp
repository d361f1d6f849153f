// Placeholder; the real CLI lands with the register/eval stack.
int main() { return 0; }
