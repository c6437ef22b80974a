int dp(int n)
{
    int kai[31];
    int i;
    kai[1] = 1;
    kai[2] = 2;
    kai[3] = 4;
    for (i = 4; i < 31; i++)
        kai[i] = kai[i - 3] + kai[i - 2] + kai[i - 1];
    return kai[n];
}
