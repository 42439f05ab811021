#include "zkrt.h"

#ifndef FIB_N
#define FIB_N 18
#endif

static u32 fib(u32 n) {
    return n < 2 ? n : fib(n - 1) + fib(n - 2);
}

int main(void) {
    u32 f = fib(FIB_N);
    zk_put_u32(f);
    return (int)(f & 0x7f);
}
