/* Four-deep loop nest storing a constant into every element. */
#include "zkrt.h"

#ifndef N
#define N 8
#endif

int main(void) {
    int v[N][N][N][N];
    for (int k = 0; k < N; k++) {
        for (int j = 0; j < N; j++) {
            for (int i = 0; i < N; i++) {
                for (int l = 0; l < N; l++) {
                    v[k][j][i][l] = 42;
                }
            }
        }
    }
    u32 sum = 0;
    for (int k = 0; k < N; k++) sum += (u32)v[k][N - 1 - k][k][N - 1];
    zk_put_u32(sum);
    return 0;
}
