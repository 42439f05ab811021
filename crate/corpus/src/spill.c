/* Many live scalars in a hot loop: unpromoted locals live in stack slots. */
#include "zkrt.h"

#ifndef ITERS
#define ITERS 2000
#endif

int main(void) {
    u32 a = 1, b = 2, c = 3, d = 4, e = 5, f = 6, g = 7, h = 8;
    for (u32 i = 0; i < ITERS; i++) {
        a += b ^ i;
        b += c + (a >> 3);
        c ^= d + a;
        d += e * 3;
        e ^= f + (d << 1);
        f += g ^ e;
        g += h + f;
        h ^= a + g;
    }
    zk_put_u32(a ^ b ^ c ^ d);
    zk_put_u32(e ^ f ^ g ^ h);
    return 0;
}
