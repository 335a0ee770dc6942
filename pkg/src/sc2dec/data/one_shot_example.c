int count_in_range(int *values, int n, int lo, int hi)
{
    int count = 0;
    if (values == 0 || n <= 0)
        return -1;
    for (int i = 0; i < n; i++) {
        if (values[i] < lo) {
            continue;
        } else if (values[i] > hi) {
            count -= 1;
        } else {
            count += 2;
        }
    }
    return count;
}
