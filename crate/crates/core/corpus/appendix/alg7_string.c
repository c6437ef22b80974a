int main(){
    char s[21];
    int i, len;
    scanf("%s", s);
    len = strlen(s);
    for(i = len - 1; i >= 0; i--){
        printf("%c", s[i]);
    }
    printf("\n");
    return 0;
}
