/* Runtime support, built once with fixed flags and linked into every guest. */
#include "zkrt.h"

void *memset(void *dst, int c, unsigned long n) {
    u8 *d = dst;
    while (n--) *d++ = (u8)c;
    return dst;
}

void *memcpy(void *dst, const void *src, unsigned long n) {
    u8 *d = dst;
    const u8 *s = src;
    while (n--) *d++ = *s++;
    return dst;
}

void *memmove(void *dst, const void *src, unsigned long n) {
    u8 *d = dst;
    const u8 *s = src;
    if (d < s) {
        while (n--) *d++ = *s++;
    } else {
        d += n;
        s += n;
        while (n--) *--d = *--s;
    }
    return dst;
}

int memcmp(const void *a, const void *b, unsigned long n) {
    const u8 *x = a, *y = b;
    for (; n; n--, x++, y++) {
        if (*x != *y) return *x - *y;
    }
    return 0;
}

void zk_puts(const char *s) {
    u32 n = 0;
    while (s[n]) n++;
    zk_write(s, n);
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
