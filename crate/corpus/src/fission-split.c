#include "zkrt.h"

#ifndef N
#define N 4096
#endif

static int a[N], b[N];

int main(void) {
    int i;
    for (i = 0; i < N; i++) {
        a[i] = 1;
    }
    for (i = 0; i < N; i++) {
        b[i] = 2;
    }
    zk_put_u32((u32)(a[N - 1] + b[N / 2]));
    return 0;
}
