/* Host build of the guest ABI, used for native timing. */
#ifndef ZKRT_H
#define ZKRT_H

#include <string.h>
#include <unistd.h>

typedef unsigned int u32;
typedef int i32;
typedef unsigned long long u64;
typedef unsigned char u8;

static inline int zk_write(const void *buf, u32 len) {
    return (int)write(1, buf, len);
}

static inline void zk_exit(int code) {
    _exit(code);
}

void zk_puts(const char *s);
void zk_put_u32(u32 v);
void zk_put_hex(u32 v);

#endif
