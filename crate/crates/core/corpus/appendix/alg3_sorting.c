int cmpint(const void *x, const void *y)
{
    return *(int *)x - *(int *)y;
}

int main()
{
    int n, l[200];
    scanf("%d", &n);
    for (int i = 0; i < 2 * n; i++) {
        scanf("%d", &l[i]);
    }
    qsort(l, 2 * n, sizeof(int), cmpint);
    int ans = 0;
    for (int i = 0; i < n; i++) {
        ans += l[2 * i];
    }
    printf("%d\n", ans);
    return 0;
}
