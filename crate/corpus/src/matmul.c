/* 5x5 matrix-vector product repeated; integer arithmetic (no FPU). */
#include "zkrt.h"

#ifndef REPS
#define REPS 200
#endif

static i32 mat[5][5];
static i32 vec[5];

static void matmul(const i32 m[5][5], const i32 x[5], i32 res[5]) {
    for (int row = 0; row < 5; row++) res[row] = 0;
    for (int col = 0; col < 5; col++) {
        for (int row = 0; row < 5; row++) {
            res[row] += m[col][row] * x[col];
        }
    }
}

int main(void) {
    for (int i = 0; i < 5; i++) {
        vec[i] = i + 1;
        for (int j = 0; j < 5; j++) mat[i][j] = (i * 5 + j) % 7 - 3;
    }
    i32 res[5];
    u32 check = 0;
    for (int r = 0; r < REPS; r++) {
        vec[r % 5] += 1;
        matmul(mat, vec, res);
        for (int i = 0; i < 5; i++) check = check * 31 + (u32)res[i];
    }
    zk_put_u32(check);
    return 0;
}
