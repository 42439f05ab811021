#include "zkrt.h"

#ifndef LEN
#define LEN 2048
#endif

static i32 data[LEN];

static i32 div8(i32 x) {
    return x / 8;
}

int main(void) {
    u32 seed = 777;
    for (u32 i = 0; i < LEN; i++) {
        seed = seed * 1664525u + 1013904223u;
        data[i] = (i32)seed;
    }
    i32 sum = 0;
    for (u32 i = 0; i < LEN; i++) {
        sum += div8(data[i]);
    }
    zk_put_u32((u32)sum);
    return 0;
}
