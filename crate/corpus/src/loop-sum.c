#include "zkrt.h"

#ifndef N
#define N 10000
#endif

int main(void) {
    u32 sum = 0;
    for (u32 i = 0; i < N; i++) {
        sum += i * i + (i >> 3);
    }
    zk_put_u32(sum);
    return 0;
}
