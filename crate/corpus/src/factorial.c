#include "zkrt.h"

#ifndef ROUNDS
#define ROUNDS 200
#endif

static u32 factorial(u32 n) {
    if (n <= 1) return 1;
    return n * factorial(n - 1);
}

int main(void) {
    u32 acc = 0;
    for (u32 r = 0; r < ROUNDS; r++) {
        for (u32 n = 1; n <= 12; n++) {
            acc ^= factorial(n) + r;
        }
    }
    zk_put_u32(factorial(12));
    zk_put_u32(acc);
    return 0;
}
