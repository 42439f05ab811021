/* 64-bit accumulator loop called from a hot outer loop; inlining it forces
   three 64-bit values to coexist in registers. */
#include "zkrt.h"

#ifndef CALLS
#define CALLS 300
#endif

static u64 work(u64 x) {
    u64 sum = x;
    for (u64 j = 0; j < 100; j++) {
        sum = sum * 31 + j;
    }
    return sum;
}

int main(void) {
    u64 acc = 0;
    for (u64 i = 0; i < CALLS; i++) {
        acc ^= work(i);
    }
    zk_put_hex((u32)(acc >> 32));
    zk_put_hex((u32)acc);
    return 0;
}
