/* Writes one word per 1 KB page across PAGES pages, then reads them back. */
#include "zkrt.h"

#ifndef PAGES
#define PAGES 16
#endif

#define WORDS_PER_PAGE 256

static u32 region[PAGES * WORDS_PER_PAGE] __attribute__((aligned(1024)));

int main(void) {
    for (u32 p = 0; p < PAGES; p++) {
        region[p * WORDS_PER_PAGE] = p * 3 + 1;
    }
    u32 sum = 0;
    for (u32 p = 0; p < PAGES; p++) {
        sum += region[p * WORDS_PER_PAGE];
    }
    zk_put_u32(sum);
    return 0;
}
