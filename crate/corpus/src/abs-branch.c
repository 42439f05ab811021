#include "zkrt.h"

#ifndef LEN
#define LEN 2048
#endif

static i32 data[LEN];

static i32 abs_branchy(i32 x) {
    if (x < 0) return -x;
    return x;
}

int main(void) {
    u32 seed = 12345;
    for (u32 i = 0; i < LEN; i++) {
        seed = seed * 1103515245u + 12345u;
        data[i] = (i32)(seed >> 8) - (1 << 22);
    }
    u32 sum = 0;
    for (u32 i = 0; i < LEN; i++) {
        sum += (u32)abs_branchy(data[i]);
    }
    zk_put_u32(sum);
    return 0;
}
