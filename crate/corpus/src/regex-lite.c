/* Backtracking matcher for c . * ^ $ over a fixed set of patterns and texts. */
#include "zkrt.h"

static int match_here(const char *re, const char *text);

static int match_star(int c, const char *re, const char *text) {
    do {
        if (match_here(re, text)) return 1;
    } while (*text != '\0' && (*text++ == c || c == '.'));
    return 0;
}

static int match_here(const char *re, const char *text) {
    if (re[0] == '\0') return 1;
    if (re[1] == '*') return match_star(re[0], re + 2, text);
    if (re[0] == '$' && re[1] == '\0') return *text == '\0';
    if (*text != '\0' && (re[0] == '.' || re[0] == *text)) return match_here(re + 1, text + 1);
    return 0;
}

static int match(const char *re, const char *text) {
    if (re[0] == '^') return match_here(re + 1, text);
    do {
        if (match_here(re, text)) return 1;
    } while (*text++ != '\0');
    return 0;
}

static const char *const patterns[] = {
    "ab*c", "^hello", "world$", "a.*z", "x*y*z*", "^.*needle.*$", "q.u.x", "^$",
};

static const char *const texts[] = {
    "abbbbbc", "hello world", "say hello", "the world", "abcdefghijklmnopqrstuvwxyz",
    "zzz", "haystack with a needle inside", "quux", "", "aaaaaaaaaaaaaaaaaaaaaaaaaaaaab",
};

int main(void) {
    u32 bits = 0, count = 0;
    for (u32 p = 0; p < sizeof(patterns) / sizeof(patterns[0]); p++) {
        for (u32 t = 0; t < sizeof(texts) / sizeof(texts[0]); t++) {
            int m = match(patterns[p], texts[t]);
            count += (u32)m;
            bits = bits * 3 + (u32)m;
        }
    }
    zk_put_u32(count);
    zk_put_hex(bits);
    return 0;
}
