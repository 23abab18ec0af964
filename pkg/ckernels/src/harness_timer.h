#ifndef HARNESS_TIMER_H
#define HARNESS_TIMER_H

/* Monotonic wall clock in nanoseconds.  The including translation unit must
 * define _POSIX_C_SOURCE >= 199309L before any system header so that
 * clock_gettime and CLOCK_MONOTONIC are visible. */

#include <stdint.h>
#include <time.h>

static inline uint64_t now_ns(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (uint64_t)ts.tv_sec * 1000000000ull + (uint64_t)ts.tv_nsec;
}

#endif
