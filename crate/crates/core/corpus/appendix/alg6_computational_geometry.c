#include <stdio.h>
#include <math.h>
#define PI 3.14159

int main(){
    double x, y;
    int a, b, r, i;
    x = 0;
    y = 0;
    r = 90;
    scanf("%d,%d", &a, &b);
    while(a != 0 || b != 0){
        x += a * cos((double)r / 180 * PI);
        y += a * sin((double)r / 180 * PI);
        r -= b;
        scanf("%d,%d", &a, &b);
    }
    printf("%d\n%d\n", (int)x, (int)y);
    return 0;
}
