#include "zkrt.h"

void zk_puts(const char *s) {
    zk_write(s, (u32)strlen(s));
}

void zk_put_u32(u32 v) {
    char buf[12];
    int i = 11;
    buf[i] = '\n';
    do {
        buf[--i] = (char)('0' + v % 10);
        v /= 10;
    } while (v);
    zk_write(&buf[i], (u32)(12 - i));
}

void zk_put_hex(u32 v) {
    static const char digits[] = "0123456789abcdef";
    char buf[9];
    for (int i = 0; i < 8; i++) buf[i] = digits[(v >> (28 - 4 * i)) & 0xf];
    buf[8] = '\n';
    zk_write(buf, 9);
}
